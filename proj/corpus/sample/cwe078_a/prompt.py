import subprocess


def ping_host(hostname):
    """Run ping once against hostname and return True if it answered."""
