import sys
from pathlib import Path

# Make the shared test helpers importable regardless of invocation dir.
sys.path.insert(0, str(Path(__file__).parent))
