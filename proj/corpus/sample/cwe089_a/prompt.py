import sqlite3


def find_user(conn, username):
    """Return the row of the users table whose name equals username, or None."""
