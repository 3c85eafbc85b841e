# Data models initialization
