"""Fairness regularizers"""
from .mmd import KernelConfig, gaussian_gram, gaussian_kernel, mmd_sq, mmd_sq_grad

__all__ = ['KernelConfig', 'gaussian_gram', 'gaussian_kernel', 'mmd_sq', 'mmd_sq_grad']
