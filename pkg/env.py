import os
from os import getenv

# environment (or define here)
LOG_LEVEL = getenv("LOG_LEVEL", "INFO").upper()

# caps worker threads for replicates, loss tables and ranking chunks
RANKPRIOR_THREADS = max(1, int(getenv("RANKPRIOR_THREADS", str(os.cpu_count() or 1))))

# set to 1 to run the full-scale acceptance tests (n=100000, 200 replicates)
RANKPRIOR_SLOW = getenv("RANKPRIOR_SLOW", "0").lower() in ("1", "true", "yes")

# where `fetch` stores downloaded datasets
RANKPRIOR_DATA_DIR = getenv("RANKPRIOR_DATA_DIR", "data")

# disables colour in log output
NO_COLOR = getenv("NO_COLOR") is not None
