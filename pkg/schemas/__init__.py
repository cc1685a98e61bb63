"""
Pydantic report models.
"""
