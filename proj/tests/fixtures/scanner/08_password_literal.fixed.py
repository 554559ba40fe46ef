import os

import psycopg2


def connect():
    db_password = os.environ["DB_PASSWORD"]
    return psycopg2.connect(host="db", user="app", password=db_password)
