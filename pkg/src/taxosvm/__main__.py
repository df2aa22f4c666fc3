from taxosvm.cli import main
import sys

sys.exit(main())
