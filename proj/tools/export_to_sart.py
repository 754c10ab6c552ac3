#!/usr/bin/env python3
"""Convert rasters to the tile format the demnet CLI reads.

Tile layout (little-endian):
    magic   4 bytes  "SART"
    version u32      1
    dtype   u8       1 = complex64 (SLC), 2 = float32 (DEM)
    rows    u32
    cols    u32
    payload row-major; complex64 stored as interleaved float32 re, im

Reads .npy arrays directly. For geospatial sources (GeoTIFF etc.) export to
.npy first, e.g. with rasterio:

    import rasterio, numpy as np
    with rasterio.open("scene.tif") as src:
        np.save("scene.npy", src.read(1))

Keeping that step outside this script avoids a GDAL dependency here.

Usage:
    export_to_sart.py input.npy output.sart
    complex input  -> SLC tile (any complex dtype, stored as complex64)
    float input    -> DEM tile (any float dtype, stored as float32)
"""

import struct
import sys

import numpy as np


def write_sart(path, arr):
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
    if np.iscomplexobj(arr):
        dtype_code = 1
        payload = np.ascontiguousarray(arr, dtype=np.complex64)
    else:
        dtype_code = 2
        payload = np.ascontiguousarray(arr, dtype=np.float32)
    if not np.all(np.isfinite(payload.view(np.float32))):
        raise ValueError("array contains non-finite values")
    rows, cols = arr.shape
    with open(path, "wb") as f:
        f.write(b"SART")
        f.write(struct.pack("<IBII", 1, dtype_code, rows, cols))
        if sys.byteorder == "big":
            payload = payload.byteswap()
        f.write(payload.tobytes())
    kind = "slc" if dtype_code == 1 else "dem"
    print(f"{kind} tile: {path} ({rows}x{cols})")


def main(argv):
    if len(argv) != 3:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    write_sart(argv[2], np.load(argv[1]))
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
