# utils/caching.py
"""
Caching utilities for qlslab.
Provides the file-based record store that makes experiment sweeps resumable:
one JSON file per run, named by a hash of the run's identity.
"""

import os
import json
import hashlib
import logging
from pathlib import Path

logger = logging.getLogger('qlslab.caching')


class RunCache:
    """Simple file-based record store, one JSON document per key"""

    def __init__(self, cache_dir):
        """
        Initialize the store.

        Args:
            cache_dir: Directory holding one `<hash>.json` file per record
        """
        self.cache_dir = Path(cache_dir)

        # Create cache directory if it doesn't exist
        os.makedirs(self.cache_dir, exist_ok=True)

    def path_for(self, key):
        """Return the file path that stores `key`"""
        return self.cache_dir / f"{self._hash_key(key)}.json"

    def exists(self, key):
        return self.path_for(key).exists()

    def get(self, key):
        """Get a record from the store, or None when absent or unreadable"""
        file_key = self._hash_key(key)
        cache_file = self.cache_dir / f"{file_key}.json"

        if not cache_file.exists():
            return None

        try:
            with open(cache_file, 'r') as f:
                cache_data = json.load(f)

            if cache_data.get('key') != _canonical(key):
                logger.warning(f"Hash collision or stale record for key: {file_key}")
                return None

            logger.debug(f"Record hit for key: {file_key}")
            return cache_data['data']
        except (json.JSONDecodeError, KeyError) as e:
            # Invalid record file - remove it so the run is redone
            logger.warning(f"Invalid record file for key: {file_key}. Error: {str(e)}")
            os.remove(cache_file)
            return None

    def set(self, key, data):
        """Store a record; the write goes through a temporary file"""
        cache_file = self.path_for(key)
        tmp_file = cache_file.with_suffix('.tmp')

        cache_data = {
            'key': _canonical(key),
            'data': data,
        }

        with open(tmp_file, 'w') as f:
            json.dump(cache_data, f, indent=2)
        os.replace(tmp_file, cache_file)

        logger.debug(f"Record set for key: {cache_file.stem}")
        return cache_file

    def delete(self, key):
        """Delete a record from the store"""
        cache_file = self.path_for(key)

        if cache_file.exists():
            os.remove(cache_file)
            logger.debug(f"Record deleted for key: {cache_file.stem}")
            return True
        return False

    def clear(self):
        """Remove every record file"""
        cache_files = list(self.cache_dir.glob("*.json"))
        for cache_file in cache_files:
            os.remove(cache_file)
        logger.info(f"Record store cleared. Removed {len(cache_files)} files.")
        return len(cache_files)

    def _hash_key(self, key):
        """Create a file-safe hash from a record key"""
        return hashlib.md5(_canonical(key).encode('utf-8')).hexdigest()


def _canonical(key):
    if isinstance(key, (dict, list, tuple)):
        return json.dumps(key, sort_keys=True)
    return str(key)
