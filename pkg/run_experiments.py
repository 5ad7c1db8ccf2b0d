import logging
logging.basicConfig()
logger = logging.getLogger()
logger.setLevel(logging.WARNING)

import sys

from modules.cli import main

# Usage: python run_experiments.py <run|table|ratio|moments|grid|check> [options]
# exit codes: 0 success, 1 invalid input or failed check, 2 numeric guard, 3 I/O

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
