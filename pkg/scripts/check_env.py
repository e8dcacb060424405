import sys

import numpy
import scipy
import tqdm

print(f"numpy: {numpy.__version__}")
print(f"scipy: {scipy.__version__}")
print(f"tqdm: {tqdm.__version__}")
print(f"Python: {sys.version}")
print(f"Platform: {sys.platform}")
