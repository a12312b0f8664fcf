#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Package for nti.ivreg.

Instrumental-variables estimation (OLS, 2SLS, JIVE, LIML), weak-instrument
diagnostics and a reproducible Monte-Carlo harness.
"""

__docformat__ = "restructuredtext en"
