import os

import numpy as np
import pandas as pd

from crlab.data.dataset import ScmDataset


def dataset_frame(data: ScmDataset) -> pd.DataFrame:
    columns = {f"x{i}": data.x[:, i] for i in range(data.x.shape[1])}
    columns.update({f"t{i}": data.t[:, i] for i in range(data.d)})
    columns["y"] = data.y
    return pd.DataFrame(columns)


def dataset_to_csv(data: ScmDataset, path: str) -> str:
    """One column per variable: x0..x{q-1}, t0..t{d-1}, y."""
    folder = os.path.dirname(path)
    if folder:
        os.makedirs(folder, exist_ok=True)
    dataset_frame(data).to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def dataset_from_csv(path: str, d_c: int) -> ScmDataset:
    frame = pd.read_csv(path, float_precision="round_trip")
    x = frame[[c for c in frame.columns if c.startswith("x")]].to_numpy(np.float64)
    t = frame[[c for c in frame.columns if c.startswith("t")]].to_numpy(np.float64)
    return ScmDataset(x, t, frame["y"].to_numpy(np.float64), d_c=d_c)
