"""Entry point for `python3 -m snpkit`."""

from .cli import entry

if __name__ == "__main__":
    entry()
