from kdnav.data.loader import DataFormatError, RawTrack, load_dataset
from kdnav.data.preprocess import (
    ProcessedTrack,
    TrackTooShortError,
    cleanse,
    preprocess_dataset,
    read_track_cache,
    resample_and_differentiate,
    write_track_cache,
)
from kdnav.data.sampling import Sample, SampleExtractor, augment, extract_sample

__all__ = [
    "DataFormatError",
    "RawTrack",
    "load_dataset",
    "ProcessedTrack",
    "TrackTooShortError",
    "cleanse",
    "preprocess_dataset",
    "read_track_cache",
    "write_track_cache",
    "resample_and_differentiate",
    "Sample",
    "SampleExtractor",
    "augment",
    "extract_sample",
]
