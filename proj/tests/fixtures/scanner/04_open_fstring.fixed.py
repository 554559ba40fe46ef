import os

BASE = "/var/reports"


def read_report(name):
    path = os.path.realpath(os.path.join(BASE, name))
    if not path.startswith(BASE + os.sep):
        raise ValueError("path escapes the report directory")
    with open(path) as fh:
        return fh.read()
