import sys

import logging

from ._cli import DistributedLoglinearCli


def main():
    logging.basicConfig()

    cli = DistributedLoglinearCli(sys.argv[1:])
    print(cli.run())
    sys.exit(cli.exit_code)


if __name__ == "__main__":
    main()
