# coding=utf-8
# SPDX-License-Identifier: Apache-2.0
"""Delay laws, mixture kernels, cycle profit and policy selection."""
