import sys

from biodqpt.cli import main

sys.exit(main())
