#!/usr/bin/env python3
"""
qi-toolkit - Launcher

Entry point for frozen builds; forwards to the command-line front end.
"""

import sys


def main():
    try:
        from qi_toolkit import main as cli_main
    except Exception as e:
        print(f"Error starting qi-toolkit: {e}", file=sys.stderr)
        sys.exit(2)
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
