#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
tsaextreme Runner
"""

import sys
import os

# Add the parent directory to the path so that 'tsaextreme' can be imported
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from tsaextreme.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
