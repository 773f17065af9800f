# file: aacord/__main__.py
import sys

from aacord.cli import main

sys.exit(main())
# end file
