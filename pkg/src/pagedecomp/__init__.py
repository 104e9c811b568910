"""Layout decomposition for scanned printed pages.

Splits a page image into labeled regions (image, headline, sub-headline,
column) after correcting skew and quarter-turn rotation.  Designed for
scripts whose letters hang from a headline bar (matra), which the
orientation stage exploits.
"""

__version__ = "0.1.0"
