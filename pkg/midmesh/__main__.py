#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""Allowing to run module directly."""

import midmesh.main

if __name__ == "__main__":
    midmesh.main.main()
