"""
Entry point for the Quintain limerick engine.
This script dispatches to the command-line interface.
"""
import os
import sys

# Ensure paths are correctly set
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from ui.cli import run_cli


def main():
    """Main function to run the application."""
    try:
        sys.exit(run_cli(sys.argv[1:]))
    except KeyboardInterrupt:
        sys.stderr.write("\nShutting down gracefully...\n")
        sys.exit(130)


if __name__ == "__main__":
    main()
