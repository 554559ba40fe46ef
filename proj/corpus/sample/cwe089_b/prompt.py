import sqlite3


def delete_orders(conn, customer_id):
    """Delete every row of the orders table for customer_id and commit."""
