"""Integration tests for dgsem-amr.

Integration tests run the spatial operator, SSPRK3 stepping, limiting and
mesh adaptation together on complete meshes and benchmark cases.
"""
