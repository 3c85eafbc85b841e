# Utility functions initialization
