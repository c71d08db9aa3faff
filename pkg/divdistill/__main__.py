"""
Run the command line interface: ``python -m divdistill <command> ...``
"""

from divdistill.cli import main

if __name__ == '__main__':
    main()
