"""Process entry for a spawned display consumer (kept out of __init__ so
running it with -m does not shadow an already imported module)."""

from .consumer import consumer_main

if __name__ == "__main__":
    raise SystemExit(consumer_main())
