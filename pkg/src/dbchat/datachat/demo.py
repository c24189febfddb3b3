"""The committed sales demo dataset: six orders over two product categories
(A totals 30, B totals 70), two user segments (consumer 45, enterprise 55),
and six months of 2024.  Every offline scenario checks against these sums."""

from __future__ import annotations

import sqlite3

DEMO_PRODUCTS = [(1, "A"), (2, "B")]
DEMO_USERS = [(1, "consumer"), (2, "enterprise")]
DEMO_ORDERS = [
    # (id, user_id, product_id, amount, month)
    (1, 1, 1, 10, "2024-01"),
    (2, 2, 1, 20, "2024-02"),
    (3, 1, 2, 15, "2024-03"),
    (4, 1, 2, 20, "2024-04"),
    (5, 2, 2, 30, "2024-05"),
    (6, 2, 2, 5, "2024-06"),
]

CATEGORY_TOTALS = {"A": 30, "B": 70}
SEGMENT_TOTALS = {"consumer": 45, "enterprise": 55}


def build_demo_database(connection: sqlite3.Connection) -> None:
    """Create and populate the demo schema (orders, products, users)."""
    connection.executescript(
        """
        CREATE TABLE products (
          id INTEGER PRIMARY KEY,
          category TEXT
        );
        CREATE TABLE users (
          id INTEGER PRIMARY KEY,
          segment TEXT
        );
        CREATE TABLE orders (
          id INTEGER PRIMARY KEY,
          user_id INTEGER REFERENCES users(id),
          product_id INTEGER REFERENCES products(id),
          amount INTEGER,
          month DATE
        );
        """
    )
    connection.executemany("INSERT INTO products VALUES (?, ?)", DEMO_PRODUCTS)
    connection.executemany("INSERT INTO users VALUES (?, ?)", DEMO_USERS)
    connection.executemany("INSERT INTO orders VALUES (?, ?, ?, ?, ?)", DEMO_ORDERS)
    connection.commit()
