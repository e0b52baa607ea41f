"""Exception types shared across the toolkit."""


class ClweError(Exception):
    """Raised for data-level failures: malformed files, bad shapes, zero vectors.

    The CLI maps this (and I/O errors) to exit code 1; argparse usage
    errors exit with 2.
    """
