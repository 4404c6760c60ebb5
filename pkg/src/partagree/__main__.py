import sys

from partagree.cli import main

sys.exit(main())
