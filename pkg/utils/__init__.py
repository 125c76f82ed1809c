"""Utilities package"""
from .logger import setup_logger
from .exceptions import *