def fnum(x):
    """Shortest round-trip decimal for a float-valued scalar (numpy or python)."""
    return repr(float(x))
