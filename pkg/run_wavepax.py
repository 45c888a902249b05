#!/usr/bin/env python3
"""
CLI script for running wavepax experiments.
"""

from wavepax.cli import run

if __name__ == "__main__":
    run()
