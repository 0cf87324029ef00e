# main.py
import sys

from saddle_field.cli import main

if __name__ == "__main__":
    sys.exit(main())
