import subprocess


def list_directory(path):
    """Return the output of `ls -l` for the given directory as a string."""
