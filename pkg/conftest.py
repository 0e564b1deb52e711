# Keeps the repository root importable when pytest is run from anywhere.
