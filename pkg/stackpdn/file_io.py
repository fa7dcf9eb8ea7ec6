#!/usr/bin/env python
""" Contains the output writing code shared by the commands.

    See the file "LICENSE" for the full license governing this code.
    Copyright 2017-2021 Ken Farmer
"""
import csv
import errno
import logging
import os
from os.path import dirname, isfile
from types import TracebackType
from typing import Any, Iterable, List, Optional, Type

from ruamel.yaml import YAML


logger = logging.getLogger(__name__)



class OutputHandler(object):
    """ Writes one output file, either csv records or text lines.
    """

    def __init__(self,
                 output_filename: str,
                 kind: str = 'csv') -> None:

        assert kind in ('csv', 'text', 'yaml'), f'invalid kind: {kind}'
        self.output_filename = output_filename
        self.kind = kind
        self.rec_cnt = 0
        make_dirs(dirname(output_filename))
        self.outfile = open(output_filename, 'wt', encoding='utf-8', newline='')
        if kind == 'csv':
            self.writer = csv.writer(self.outfile, lineterminator='\n')
        else:
            self.writer = None


    def write_rec(self,
                  record: List[str]) -> None:
        try:
            self.writer.writerow(record)
            self.rec_cnt += 1
        except csv.Error:
            logger.error('Invalid record: %s', record)
            raise


    def write_recs(self,
                   records: Iterable[List[str]]) -> None:
        for record in records:
            self.write_rec(record)


    def write_text_rec(self,
                       record: str) -> None:
        self.outfile.write(record + '\n')
        self.rec_cnt += 1


    def write_yaml(self,
                   data: Any) -> None:
        yaml = YAML(typ='safe')
        yaml.default_flow_style = False
        yaml.sort_base_mapping_type_on_output = False
        yaml.dump(data, self.outfile)


    def close(self) -> None:
        if not self.outfile.closed:
            self.outfile.close()



class OutputTracker(object):
    """ Opens the outputs of one command and removes them all if it fails.

        Used as a context manager: on an exception every file opened through
        the tracker is closed and deleted, then the exception propagates.
    """

    def __init__(self) -> None:
        self.handlers: List[OutputHandler] = []
        self.extra_paths: List[str] = []

    @property
    def paths(self) -> List[str]:
        return [x.output_filename for x in self.handlers] + self.extra_paths

    def open(self,
             output_filename: str,
             kind: str = 'csv') -> OutputHandler:
        handler = OutputHandler(output_filename, kind)
        self.handlers.append(handler)
        return handler

    def track(self,
              output_filename: str) -> str:
        """ Registers a file written outside the tracker so a failure removes it too.
        """
        make_dirs(dirname(output_filename))
        self.extra_paths.append(output_filename)
        return output_filename

    def write_csv(self,
                  output_filename: str,
                  records: Iterable[List[str]]) -> str:
        handler = self.open(output_filename, 'csv')
        handler.write_recs(records)
        handler.close()
        return output_filename

    def write_text(self,
                   output_filename: str,
                   lines: Iterable[str]) -> str:
        handler = self.open(output_filename, 'text')
        for line in lines:
            handler.write_text_rec(line)
        handler.close()
        return output_filename

    def write_yaml(self,
                   output_filename: str,
                   data: Any) -> str:
        handler = self.open(output_filename, 'yaml')
        handler.write_yaml(data)
        handler.close()
        return output_filename

    def close(self) -> None:
        for handler in self.handlers:
            handler.close()

    def remove_all(self) -> None:
        self.close()
        for path in self.paths:
            if isfile(path):
                logger.debug('removing partial output: %s', path)
                os.remove(path)
        self.handlers = []
        self.extra_paths = []

    def __enter__(self) -> 'OutputTracker':
        return self

    def __exit__(self,
                 exc_type: Optional[Type[BaseException]],
                 exc_value: Optional[BaseException],
                 traceback: Optional[TracebackType]) -> None:
        if exc_type is None:
            self.close()
        else:
            self.remove_all()



def make_dirs(path: str) -> None:
    if not path:
        return
    try:
        os.makedirs(path)
    except OSError as exc:
        if exc.errno != errno.EEXIST:
            raise
