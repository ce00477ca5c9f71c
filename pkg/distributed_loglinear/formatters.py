import csv
import io
import json
import pprint
from typing import Any, Dict, List, Protocol, Sequence


class Result(Protocol):
    def to_raw_data(self) -> Dict[str, Any]: ...


class Formatter:
    """Formatter should be used as an abstract base class.

    Formatter classes should inherit from this class and implement
    their own .format_result() method which should return a string. A
    result is anything exposing .to_raw_data().
    """

    def format_result(self, result: Result, **kwargs) -> str:
        raise NotImplementedError(
            "A subclass of Formatter must implement "
            "their own .format_result() method."
        )

    def format_results(self, results: Sequence[Result], **kwargs) -> str:
        raise NotImplementedError(
            "A subclass of Formatter must implement "
            "their own .format_results() method."
        )


class PrettyPrintFormatter(Formatter):
    def format_result(self, result: Result, **kwargs) -> str:
        return pprint.pformat(result.to_raw_data(), **kwargs)

    def format_results(self, results: Sequence[Result], **kwargs) -> str:
        return pprint.pformat([result.to_raw_data() for result in results], **kwargs)


class JSONFormatter(Formatter):
    def format_result(self, result: Result, **kwargs) -> str:
        """Converts a result into a JSON string.

        :param result:
        :return: A JSON string representation of the result.
        """
        kwargs.setdefault("indent", 2)
        return json.dumps(result.to_raw_data(), **kwargs)

    def format_results(self, results: Sequence[Result], **kwargs) -> str:
        kwargs.setdefault("indent", 2)
        return json.dumps([result.to_raw_data() for result in results], **kwargs)


class CSVFormatter(Formatter):
    """
    Plot-ready rows. Everything which is not a row goes, as JSON, into a leading
    `# provenance:` comment line so the file stays self-describing.
    """

    ROW_KEYS = ("rows", "entries")

    def _split(self, raw: Dict[str, Any]):
        for key in self.ROW_KEYS:
            if key in raw:
                rest = {name: value for name, value in raw.items() if name != key}
                return rest, raw[key]
        return raw, []

    def _header(self, rows: List[Dict[str, Any]]) -> List[str]:
        header = []
        for row in rows:
            for key in row:
                if key not in header:
                    header.append(key)
        return header

    def _cell(self, value: Any) -> str:
        if value is None:
            return ""
        if isinstance(value, bool):
            return str(value).lower()
        if isinstance(value, float):
            return repr(value)
        if isinstance(value, (list, tuple)):
            return " ".join(self._cell(item) for item in value)
        return str(value)

    def format_result(self, result: Result, **kwargs) -> str:
        provenance, rows = self._split(result.to_raw_data())
        buffer = io.StringIO()
        buffer.write(f"# provenance: {json.dumps(provenance, sort_keys=True)}\n")
        header = self._header(rows)
        writer = csv.writer(buffer, lineterminator="\n")
        if header:
            writer.writerow(header)
        for row in rows:
            writer.writerow([self._cell(row.get(key)) for key in header])
        return buffer.getvalue()

    def format_results(self, results: Sequence[Result], **kwargs) -> str:
        return "\n".join(self.format_result(result, **kwargs) for result in results)


class FormatterLoader:
    TYPES = {
        "json": JSONFormatter,
        "csv": CSVFormatter,
        "pretty": PrettyPrintFormatter,
    }

    class UnknownFormatterType(Exception):
        def __init__(self, formatter_type: str):
            super().__init__(
                "The format '{formatter_type}' is not supported. "
                "Choose one of the following formats: {supported_formatter_types}".format(
                    formatter_type=formatter_type,
                    supported_formatter_types=", ".join(FormatterLoader.TYPES.keys()),
                )
            )

    def load(self, formatter_type: str = "json") -> Formatter:
        """
        Loads the Formatter for the given formatter type.

        :param formatter_type:
        :return: Formatter object
        """
        if formatter_type not in FormatterLoader.TYPES.keys():
            raise FormatterLoader.UnknownFormatterType(formatter_type)
        return FormatterLoader.TYPES[formatter_type]()
