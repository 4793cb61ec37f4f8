"""`python -m conicbundles` dispatches to the batch front end."""

from .cli import main

if __name__ == "__main__":
    raise SystemExit(main())
