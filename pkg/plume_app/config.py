import os

SIM_THREADS = int(os.getenv('SIM_THREADS', '0'))
SIM_LOG_LEVEL = os.getenv('SIM_LOG_LEVEL', 'WARNING')
SIM_OUTPUT_DIR = os.getenv('SIM_OUTPUT_DIR', 'output')

# The domain is the periodic unit square.
DOMAIN_LENGTH = 1.0

MANIFEST_NAME = 'manifest.cfg'


def resolve_workers(requested: int = SIM_THREADS) -> int:
    if requested > 0:
        return requested
    return os.cpu_count() or 1
