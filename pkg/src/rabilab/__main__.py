"""
Entry point for running rabi-lab as a module
"""

from .cli import main

if __name__ == "__main__":
    main()
