"""Presentation helpers for account records.

Renders rows for the operator dashboard. Formatting is fully
locale-independent because downstream storage expects stable
byte sequences across machines and deployments.
"""


def format_user(record):
    label = str(record)
    return label.strip().lower()
