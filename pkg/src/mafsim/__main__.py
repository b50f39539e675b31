import sys

from mafsim.harness.cli import main

sys.exit(main())
