"""
Embedded microsimulator and the perception-driven system under test.
"""
