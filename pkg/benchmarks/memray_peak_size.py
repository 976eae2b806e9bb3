#
# Print peak and leaked memory size in bytes from a memray .bin file, e.g. of
#
#     python -m memray run -o enhance.bin -m mcse enhance --input noisy.wav --output out.wav --decoder prior.bin
#
# https://bloomberg.github.io/memray/api.html
#

import sys
from memray import FileReader

if len(sys.argv) < 2:
    print("Usage: python memray_peak_size.py <memray-bin-file>")
    sys.exit()

reader = FileReader(sys.argv[1])
leaked = sum(record.size for record in reader.get_leaked_allocation_records())
print(f"peak_bytes={reader.metadata.peak_memory}")
print(f"leaked_bytes={leaked}")
