import psycopg2


def connect():
    db_password = "hunter2024"
    return psycopg2.connect(host="db", user="app", password=db_password)
