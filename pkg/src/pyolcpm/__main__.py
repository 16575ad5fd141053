import sys

from pyolcpm.cli import main

sys.exit(main())
