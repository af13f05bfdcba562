"""Byte-reproducible ``.npz`` writing.

``numpy.savez`` stamps each zip member with the current time, so two saves
of the same arrays differ. This writer pins the timestamp and member order.
"""

from __future__ import annotations

import os
import zipfile

import numpy as np

_EPOCH = (1980, 1, 1, 0, 0, 0)


def write_npz(path: str | os.PathLike, arrays: dict) -> None:
    """Write ``arrays`` (name -> array) as an uncompressed npz readable by ``np.load``."""
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_STORED) as zf:
        for name in sorted(arrays):
            info = zipfile.ZipInfo(f"{name}.npy", date_time=_EPOCH)
            info.external_attr = 0o644 << 16
            with zf.open(info, "w", force_zip64=True) as fh:
                np.lib.format.write_array(fh, np.asanyarray(arrays[name]), allow_pickle=False)
