"""
Manifest loading, modality fusion, balancing and splitting.
"""
