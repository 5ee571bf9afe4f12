import sys

from kdml.cli import main

sys.exit(main())
