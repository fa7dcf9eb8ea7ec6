#!/usr/bin/env python

__version__ = "0.1.0"
