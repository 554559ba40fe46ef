def delete_orders(conn, customer_id):
    conn.execute("DELETE FROM orders WHERE customer = ?", (customer_id,))
    conn.commit()
