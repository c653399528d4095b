from eql.cli import main

main()
