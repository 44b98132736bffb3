import hashlib
import json
import os
from datetime import datetime
from os import path, makedirs, getenv
from tempfile import gettempdir, mkstemp
from uuid import uuid4

import numpy as np


class NumpyJsonEncoder(json.JSONEncoder):
    def default(self, obj):
        if isinstance(obj, np.integer):
            return int(obj)
        elif isinstance(obj, np.floating):
            return float(obj)
        elif isinstance(obj, np.bool_):
            return bool(obj)
        elif isinstance(obj, np.ndarray):
            return obj.tolist()
        elif isinstance(obj, datetime):
            return obj.isoformat()
        else:
            return super().default(obj)


def write_json(obj, file_path: str) -> None:
    with open(file_path, 'w') as fp:
        json.dump(obj, fp, cls=NumpyJsonEncoder, indent=2, sort_keys=True)
        fp.write('\n')


def read_json(file_path: str):
    with open(file_path) as fp:
        return json.load(fp)


def create_ticket() -> str:
    ticket = str(uuid4())
    return ticket


def mkdir(folder_path: str) -> None:
    """Creates recursively the path, ignoring warnings for existing directories."""
    try:
        makedirs(folder_path)
    except OSError:
        pass


def get_tmp_dir(namespace: str) -> str:
    tempdir = getenv('TEMPDIR') or gettempdir()
    tempdir = path.join(tempdir, namespace)
    mkdir(tempdir)
    return tempdir


def check_directory_writable(d):
    fd, file_name = mkstemp(None, None, d)
    os.close(fd)
    os.unlink(file_name)


def sha256sum(file_path: str) -> str:
    digest = hashlib.sha256()
    with open(file_path, 'rb') as fp:
        for chunk in iter(lambda: fp.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()
