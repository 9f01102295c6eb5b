import sys

from readmellm.cli import main

sys.exit(main())
