# data_sources/files.py
"""
Dataset directories: one `<instance_id>.json` per instance plus
`manifest.csv` (instance_id, n, kind, ground_energy, n_ground_states,
min_residual_sq).
"""

import logging
from pathlib import Path
from typing import Iterable, Iterator, List

from data_sources.base import InstanceSource
from problems.blls import BllsInstance, load_instance, save_instance
from problems.ising import SpinConvention, brute_force_solve, instance_to_ising
from utils.error_handling import DataSourceError
from utils.tables import read_table, write_table

logger = logging.getLogger('qlslab.datagen')

MANIFEST_NAME = 'manifest.csv'
MANIFEST_COLUMNS = ['instance_id', 'n', 'kind', 'ground_energy', 'n_ground_states', 'min_residual_sq']


def manifest_row(instance: BllsInstance) -> dict:
    ising = instance_to_ising(instance)
    ground_energy, ground_bits = brute_force_solve(ising)
    x = SpinConvention.bits_to_variables(min(ground_bits))
    return {
        'instance_id': instance.instance_id,
        'n': instance.n,
        'kind': instance.kind,
        'ground_energy': ground_energy,
        'n_ground_states': len(ground_bits),
        'min_residual_sq': instance.residual_sq(x),
    }


def write_dataset(instances: Iterable[BllsInstance], out_dir) -> List[Path]:
    """
    Write instance files and the manifest.

    Returns:
        Paths written, instance files first and the manifest last
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths, rows = [], []
    for instance in instances:
        if not instance.instance_id:
            raise DataSourceError("instances written to a dataset need an instance_id", source=str(out_dir))
        paths.append(save_instance(instance, out_dir / f"{instance.instance_id}.json"))
        rows.append(manifest_row(instance))
    paths.append(write_table(rows, out_dir / MANIFEST_NAME, 'manifest', columns=MANIFEST_COLUMNS))
    logger.info(f"Wrote {len(rows)} instance(s) and manifest to {out_dir}")
    return paths


def read_manifest(dataset_dir):
    path = Path(dataset_dir) / MANIFEST_NAME
    if not path.exists():
        raise DataSourceError(f"no manifest in {dataset_dir}", source=str(dataset_dir))
    return read_table(path)


class DirectorySource(InstanceSource):
    """Instances stored as JSON files in a dataset directory."""

    def __init__(self, dataset_dir):
        self.dataset_dir = Path(dataset_dir)
        if not self.dataset_dir.is_dir():
            raise DataSourceError(f"dataset directory {dataset_dir} does not exist", source=str(dataset_dir))

    @property
    def source_name(self) -> str:
        return str(self.dataset_dir)

    def instances(self) -> Iterator[BllsInstance]:
        files = sorted(self.dataset_dir.glob('*.json'))
        if not files:
            raise DataSourceError(f"no instance files in {self.dataset_dir}", source=str(self.dataset_dir))
        for path in files:
            yield load_instance(path)
