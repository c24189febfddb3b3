"""Module entry point for ``python -m dbchat``."""

from .cli import main

if __name__ == "__main__":
    main()
