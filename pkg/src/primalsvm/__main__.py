import sys

from primalsvm.cli import main

sys.exit(main())
