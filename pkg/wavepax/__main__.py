"""
Entry point for ``python -m wavepax``.
"""

from .cli import run

if __name__ == "__main__":
    run()
