"""LINMAP selection of operating points."""
