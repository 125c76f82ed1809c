"""Configuration package"""
from .config import *